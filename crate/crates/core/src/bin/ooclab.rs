fn main() {
    std::process::exit(ooclab::cli::run(std::env::args_os()));
}
