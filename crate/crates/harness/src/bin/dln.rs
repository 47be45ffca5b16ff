fn main() {
    std::process::exit(dln_harness::cli::run(std::env::args_os()));
}
