fn main() {
    let code = d4cond::cli::run(std::env::args_os(), &mut std::io::stdout().lock());
    std::process::exit(code);
}
