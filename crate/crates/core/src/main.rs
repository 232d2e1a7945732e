fn main() {
    std::process::exit(drawdown::cli::run(std::env::args_os()));
}
