fn main() {
    std::process::exit(qgt_core::cli::main());
}
