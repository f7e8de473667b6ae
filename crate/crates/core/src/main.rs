fn main() {
    std::process::exit(kslab::harness::cli::main());
}
