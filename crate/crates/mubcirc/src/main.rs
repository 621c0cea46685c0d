fn main() {
    std::process::exit(mubcirc::cli::main_with_args(std::env::args_os()));
}
