fn main() {
    std::process::exit(selfcont::cli::run(std::env::args_os()));
}
