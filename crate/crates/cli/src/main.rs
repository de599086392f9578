fn main() {
    std::process::exit(zeromach_cli::run_cli(std::env::args_os()));
}
