fn main() {
    std::process::exit(robustse_cli::run(std::env::args_os()));
}
