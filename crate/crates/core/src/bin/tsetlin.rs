fn main() {
    std::process::exit(tsetlin_rtm::cli::dispatch(std::env::args_os()));
}
