fn main() {
    std::process::exit(sea_undistort::cli::cli_main(std::env::args_os()));
}
