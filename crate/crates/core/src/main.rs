fn main() {
    std::process::exit(pointerlab::cli::run(std::env::args_os()));
}
