use clap::Parser;

fn main() {
    let cli = seqbin_cli::Cli::parse();
    match seqbin_cli::run(&cli) {
        Ok(text) => {
            if !text.is_empty() {
                println!("{}", text.trim_end());
            }
        }
        Err(e) => {
            eprintln!("seqbin: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
