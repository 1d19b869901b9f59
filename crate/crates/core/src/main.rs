fn main() {
    std::process::exit(eigenemo::cli::run(std::env::args_os()));
}
