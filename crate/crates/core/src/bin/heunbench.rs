fn main() {
    std::process::exit(heunbench::cli::run(std::env::args_os()));
}
