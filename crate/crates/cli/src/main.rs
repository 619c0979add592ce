fn main() {
    std::process::exit(roompass_cli::run_cli(std::env::args_os()));
}
