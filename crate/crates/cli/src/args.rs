use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    /// One JSON object per line.
    Machine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChannelArg {
    Onion,
    Direct,
    Tor2web,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    None,
    Marginal,
    Full,
    Ultimate,
}

#[derive(Debug, Parser)]
#[command(
    name = "onionbind",
    version,
    about = "Bind clearnet sites to onion addresses with signed descriptors",
    arg_required_else_help = true
)]
pub struct Cli {
    /// Trust store file.
    #[arg(long, global = true, env = "ONIONBIND_STORE", value_name = "PATH")]
    pub store: Option<PathBuf>,
    /// Output format.
    #[arg(long, global = true, env = "ONIONBIND_FORMAT", value_enum)]
    pub format: Option<Format>,
    /// Config file (default: <config dir>/onionbind/config.toml).
    #[arg(long, global = true, env = "ONIONBIND_CONFIG", value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Directory holding secret key files named <fingerprint>.key.
    #[arg(long, global = true, env = "ONIONBIND_KEYRING", value_name = "DIR")]
    pub keyring: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a service identity.
    Keygen(KeygenArgs),
    /// Search for an identity whose onion address starts with PREFIX.
    Vanity(VanityArgs),
    /// Create and sign a binding descriptor; prints the armored block.
    Bind(BindArgs),
    /// Manage the web-of-trust store.
    #[command(subcommand)]
    Trust(TrustCommand),
    /// Verify a clearnet/onion pair.
    Verify(VerifyArgs),
    /// Run or query notaries.
    #[command(subcommand)]
    Notary(NotaryCommand),
    /// Verify an honest and an attacked pair on a loopback simulated network.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct KeygenArgs {
    /// 32-byte seed as 64 hex digits, for reproducible keys.
    #[arg(long, value_name = "HEX")]
    pub seed: Option<String>,
    /// Secret key file to write (default: <keyring>/<fingerprint>.key).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VanityArgs {
    /// Base32 prefix (a-z, 2-7).
    pub prefix: String,
    #[arg(long, default_value_t = 1 << 32, value_name = "N")]
    pub max_trials: u64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0, value_name = "N")]
    pub jobs: usize,
    /// Deterministic search seed, 64 hex digits.
    #[arg(long, value_name = "HEX")]
    pub seed: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BindArgs {
    #[arg(long, value_name = "URL")]
    pub clearnet: String,
    #[arg(long, value_name = "ADDR")]
    pub onion: String,
    /// Signer's secret key file.
    #[arg(long, value_name = "FILE")]
    pub key: PathBuf,
    /// SHA-256 of the site's TLS certificate, 64 hex digits.
    #[arg(long = "tls-fp", value_name = "HEX")]
    pub tls_fp: Option<String>,
    #[arg(long, default_value_t = 90, value_name = "N")]
    pub days: i64,
    /// Issue time (RFC 3339, default now).
    #[arg(long, value_name = "TIME")]
    pub issued: Option<String>,
    /// Also write the armored block to FILE.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TrustCommand {
    /// Add a key from a public key file (hex) or a secret key file.
    AddKey { file: PathBuf },
    /// Set how far a key's certifications are trusted.
    Set {
        #[arg(value_enum)]
        level: LevelArg,
        fingerprint: String,
    },
    /// Certify SUBJECT with the secret key of the certifier FPR.
    Certify {
        #[arg(long = "as", value_name = "FPR")]
        certifier: String,
        subject: String,
        /// Certifier's secret key file (default: <keyring>/<FPR>.key).
        #[arg(long, value_name = "FILE")]
        key: Option<PathBuf>,
    },
    /// Show owner trust, certifications and computed validity.
    Status { fingerprint: String },
}

#[derive(Debug, Args)]
pub struct NetArg {
    /// Loopback simulated network to use, HOST:PORT.
    #[arg(long, env = "ONIONBIND_NET", value_name = "ADDR")]
    pub net: Option<String>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Clearnet URL or onion address.
    pub entry: String,
    #[arg(long, value_enum, default_value_t = ChannelArg::Onion)]
    pub channel: ChannelArg,
    #[command(flatten)]
    pub net: NetArg,
    /// Verification time (RFC 3339, default now).
    #[arg(long, value_name = "TIME")]
    pub now: Option<String>,
    /// Observed TLS certificate fingerprint to check against the descriptor.
    #[arg(long = "tls-fp", value_name = "HEX")]
    pub tls_fp: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum NotaryCommand {
    /// Crawl the targets and serve the log over HTTP.
    Serve(ServeArgs),
    /// Ask notaries about an onion address and combine their answers.
    Query(QueryArgs),
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// File of `CLEARNET_URL ONION_ADDRESS` lines.
    #[arg(long, value_name = "FILE")]
    pub targets: PathBuf,
    #[arg(long, default_value_t = 8470)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1", value_name = "ADDR")]
    pub bind: String,
    /// Seconds between crawl cycles.
    #[arg(long, default_value_t = 300, value_name = "SECS")]
    pub interval: u64,
    #[command(flatten)]
    pub net: NetArg,
    /// Notary secret key file (default: <keyring>/notary.key, created if absent).
    #[arg(long, value_name = "FILE")]
    pub key: Option<PathBuf>,
    /// Log directory (default: <config dir>/onionbind/notary).
    #[arg(long, value_name = "DIR")]
    pub log: Option<PathBuf>,
    /// Stop crawling after N cycles (keep serving).
    #[arg(long, value_name = "N")]
    pub cycles: Option<u64>,
    /// Exit once the crawl cycles are done instead of serving on.
    #[arg(long, requires = "cycles")]
    pub exit_after_crawl: bool,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    /// Comma-separated notary base URLs.
    #[arg(long, value_delimiter = ',', required = true, value_name = "URL,URL,...")]
    pub notaries: Vec<String>,
    #[arg(long, value_name = "ADDR")]
    pub onion: String,
    /// Agreement threshold (default: simple majority of answering notaries).
    #[arg(long, value_name = "K")]
    pub quorum: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Keep the simulated network running after the demo.
    #[arg(long)]
    pub serve: bool,
    #[arg(long, default_value_t = 0)]
    pub port: u16,
    /// With --serve, save the demo verifier's trust store here.
    #[arg(long, value_name = "PATH", requires = "serve")]
    pub write_store: Option<PathBuf>,
}
