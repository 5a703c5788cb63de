fn main() {
    std::process::exit(qgame::cli::main_with_args(std::env::args_os()));
}
