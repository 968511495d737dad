fn main() {
    std::process::exit(macpolar::cli::main_entry());
}
