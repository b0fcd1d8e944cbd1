fn main() {
    std::process::exit(actionvos::cli::run(std::env::args_os()));
}
