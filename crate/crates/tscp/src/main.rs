fn main() {
    std::process::exit(tscp::cli::run());
}
