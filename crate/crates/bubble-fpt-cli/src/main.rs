fn main() {
    std::process::exit(bubble_fpt_cli::run());
}
