fn main() {
    std::process::exit(steincert_cli::run_cli(std::env::args_os()));
}
