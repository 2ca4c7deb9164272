fn main() {
    std::process::exit(kinetic::cli::run());
}
