fn main() {
    std::process::exit(darkdeco::cli::main());
}
