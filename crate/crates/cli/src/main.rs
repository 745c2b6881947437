fn main() {
    std::process::exit(vectorhost_cli::run(std::env::args_os()));
}
