fn main() {
    std::process::exit(mghmi::cli::run(std::env::args_os()));
}
