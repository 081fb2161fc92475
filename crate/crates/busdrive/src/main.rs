fn main() {
    std::process::exit(busdrive::cli::run());
}
