fn main() {
    std::process::exit(tracelab::cli::run());
}
