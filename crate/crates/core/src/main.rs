fn main() {
    std::process::exit(afe_sim::cli::run());
}
