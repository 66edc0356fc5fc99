fn main() {
    std::process::exit(gbc::run_cli(std::env::args_os()));
}
