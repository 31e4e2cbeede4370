fn main() {
    std::process::exit(skewdist::cli::main_with_args(std::env::args_os()));
}
