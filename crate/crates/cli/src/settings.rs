//! Effective settings. Flags win over environment variables (both handled
//! by the argument parser), which win over the config file.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::args::{Cli, Format};
use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    store: Option<PathBuf>,
    format: Option<Format>,
    keyring: Option<PathBuf>,
    net: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Settings {
    pub store: PathBuf,
    pub format: Format,
    pub keyring: PathBuf,
    pub net: Option<String>,
    pub data_dir: PathBuf,
}

/// `$XDG_CONFIG_HOME/onionbind`, else `$HOME/.config/onionbind`.
fn default_dir() -> PathBuf {
    let base = std::env::var_os("XDG_CONFIG_HOME")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
        .or_else(|| std::env::var_os("HOME").map(|h| Path::new(&h).join(".config")))
        .unwrap_or_else(|| PathBuf::from("."));
    base.join("onionbind")
}

impl Settings {
    pub fn resolve(cli: &Cli) -> Result<Self, CliError> {
        let data_dir = default_dir();
        let config_path = cli.config.clone().unwrap_or_else(|| data_dir.join("config.toml"));
        let config = match std::fs::read_to_string(&config_path) {
            Ok(text) => toml::from_str::<ConfigFile>(&text)
                .map_err(|e| CliError::usage(format!("{}: {e}", config_path.display())))?,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound && cli.config.is_none() => ConfigFile::default(),
            Err(e) => return Err(CliError::new(format!("{}: {e}", config_path.display()))),
        };
        Ok(Self {
            store: cli.store.clone().or(config.store).unwrap_or_else(|| data_dir.join("truststore.txt")),
            format: cli.format.or(config.format).unwrap_or(Format::Text),
            keyring: cli.keyring.clone().or(config.keyring).unwrap_or_else(|| data_dir.join("keys")),
            net: config.net,
            data_dir,
        })
    }

    /// The network address from a subcommand flag or env var, else config.
    pub fn net_addr(&self, flag: &Option<String>) -> Result<std::net::SocketAddr, CliError> {
        let text = flag
            .clone()
            .or_else(|| self.net.clone())
            .ok_or_else(|| CliError::usage("no network: pass --net HOST:PORT or set ONIONBIND_NET"))?;
        use std::net::ToSocketAddrs;
        text.to_socket_addrs()
            .ok()
            .and_then(|mut a| a.next())
            .ok_or_else(|| CliError::usage(format!("bad network address {text:?}")))
    }

    pub fn machine(&self) -> bool {
        self.format == Format::Machine
    }
}
