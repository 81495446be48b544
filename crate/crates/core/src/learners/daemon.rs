//! Line-oriented ranking responder.
//!
//! Request: `M;f1,f2,...` (M = number of labels wanted, 0 for all).
//! Reply: `l1=score1,l2=score2,...`, or `error: <reason>` for a bad request.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpStream};
use std::sync::Arc;
use std::time::Duration;

use tokio::io::{AsyncBufReadExt, AsyncWriteExt};
use tokio::net::TcpListener;

use super::{LearnError, Ranker, Ranking};

fn parse_request(line: &str) -> Result<(usize, Vec<u32>), String> {
    let (m, fs) = line.split_once(';').ok_or("expected M;f1,f2,...")?;
    let m = m.trim().parse::<usize>().map_err(|_| format!("bad count {:?}", m.trim()))?;
    let fs = fs
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u32>().map_err(|_| format!("bad feature {:?}", s)))
        .collect::<Result<Vec<u32>, String>>()?;
    Ok((m, fs))
}

pub fn format_ranking(r: &Ranking) -> String {
    r.entries().iter().map(|(l, s)| format!("{}={}", l, s)).collect::<Vec<_>>().join(",")
}

pub fn parse_ranking(line: &str) -> Result<Ranking, String> {
    let line = line.trim();
    if let Some(msg) = line.strip_prefix("error:") {
        return Err(msg.trim().to_string());
    }
    if line.is_empty() {
        return Ok(Ranking(Vec::new()));
    }
    line.split(',')
        .map(|e| {
            let (l, s) = e.split_once('=').ok_or_else(|| format!("bad entry {:?}", e))?;
            Ok((
                l.parse().map_err(|_| format!("bad label {:?}", l))?,
                s.parse().map_err(|_| format!("bad score {:?}", s))?,
            ))
        })
        .collect::<Result<Vec<_>, String>>()
        .map(Ranking)
}

/// Answer one request line (without the trailing newline).
pub fn respond(model: &dyn Ranker, line: &str) -> String {
    match parse_request(line) {
        Ok((m, fs)) => match model.ranking(&fs, m) {
            Ok(r) => format_ranking(&r),
            Err(e) => format!("error: {}", e),
        },
        Err(e) => format!("error: {}", e),
    }
}

/// Serve requests until the listener fails. Each connection may send any
/// number of request lines.
pub async fn serve(model: Arc<dyn Ranker>, listener: TcpListener) -> std::io::Result<()> {
    loop {
        let (stream, _) = listener.accept().await?;
        let model = model.clone();
        tokio::spawn(async move {
            let (r, mut w) = stream.into_split();
            let mut lines = tokio::io::BufReader::new(r).lines();
            while let Ok(Some(line)) = lines.next_line().await {
                let mut reply = respond(model.as_ref(), line.trim_end_matches('\r'));
                reply.push('\n');
                if w.write_all(reply.as_bytes()).await.is_err() {
                    break;
                }
            }
        });
    }
}

/// Client side of the daemon protocol.
pub struct RemoteRanker {
    pub addr: SocketAddr,
    pub timeout: Duration,
}

impl Ranker for RemoteRanker {
    fn ranking(&self, query: &[u32], limit: usize) -> Result<Ranking, LearnError> {
        let mut stream = TcpStream::connect_timeout(&self.addr, self.timeout)?;
        stream.set_read_timeout(Some(self.timeout))?;
        let fs: Vec<String> = query.iter().map(u32::to_string).collect();
        writeln!(stream, "{};{}", limit, fs.join(","))?;
        let mut line = String::new();
        BufReader::new(stream).read_line(&mut line)?;
        parse_ranking(&line).map_err(|e| LearnError::Io(std::io::Error::other(e)))
    }
}
