fn main() {
    std::process::exit(cerberus::cli::run());
}
