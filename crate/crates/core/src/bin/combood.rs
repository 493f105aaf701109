fn main() {
    std::process::exit(combood::cli::run(std::env::args_os()));
}
