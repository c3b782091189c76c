fn main() {
    std::process::exit(pulsesync::cli::main());
}
