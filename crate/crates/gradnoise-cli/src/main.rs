fn main() {
    std::process::exit(gradnoise_cli::run());
}
