fn main() {
    std::process::exit(supaq_cli::run(std::env::args_os()));
}
