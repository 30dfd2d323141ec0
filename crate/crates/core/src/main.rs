fn main() {
    std::process::exit(moment_bc::cli::run(std::env::args_os()));
}
