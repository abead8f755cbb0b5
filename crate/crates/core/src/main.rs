fn main() {
    std::process::exit(semispec::cli::run());
}
