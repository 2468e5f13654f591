fn main() {
    std::process::exit(dialsent_cli::run_from(std::env::args_os()));
}
