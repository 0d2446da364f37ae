fn main() {
    std::process::exit(memtier::cli::run_from(std::env::args_os()));
}
