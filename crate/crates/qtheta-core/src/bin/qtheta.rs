fn main() {
    std::process::exit(qtheta_core::cli::run());
}
