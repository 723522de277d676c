fn main() {
    std::process::exit(ijvtrack::cli::run(std::env::args_os()));
}
