use clap::Parser;

fn main() {
    let cli = maqm_cli::Cli::parse();
    match maqm_cli::run(&cli) {
        Ok(summary) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
        }
        Err(err) => {
            eprintln!("{err}");
            std::process::exit(err.exit_code());
        }
    }
}
