fn main() {
    std::process::exit(qaschedule::harness::cli_main(std::env::args_os()));
}
