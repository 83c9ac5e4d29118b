fn main() {
    std::process::exit(itrpower_cli::run_cli(std::env::args_os()));
}
