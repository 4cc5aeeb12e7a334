fn main() {
    std::process::exit(tourney_core::cli::cli_main(std::env::args_os()));
}
