fn main() {
    std::process::exit(lscd::cli::main_entry());
}
