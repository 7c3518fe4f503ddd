fn main() {
    std::process::exit(uncertainty::cli::main_exit_code());
}
