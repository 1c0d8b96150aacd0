//! Classical channel between Alice and Bob: messages, a line-oriented wire
//! format, an in-process endpoint pair and a byte-stream endpoint.
//!
//! Wire grammar, one message per line:
//!
//! ```text
//! round=<u64> from=<A|B> kind=<BASIS_ANNOUNCE|PAIR_ANNOUNCE|SIFT_DECISION|SESSION_END> payload=<u64>[,<u64>...]
//! ```
//!
//! Fields are separated by exactly one space and appear in this order. The
//! payload may be empty (`payload=`). Trailing whitespace is ignored. A
//! batch is a line `batch=<n>` followed by `n` message lines.
//!
//! The channel is assumed authenticated; nothing here signs or verifies.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::str::FromStr;
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn tag(self) -> &'static str {
        match self {
            Party::Alice => "A",
            Party::Bob => "B",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MessageKind {
    BasisAnnounce,
    PairAnnounce,
    SiftDecision,
    SessionEnd,
}

impl MessageKind {
    pub fn tag(self) -> &'static str {
        match self {
            MessageKind::BasisAnnounce => "BASIS_ANNOUNCE",
            MessageKind::PairAnnounce => "PAIR_ANNOUNCE",
            MessageKind::SiftDecision => "SIFT_DECISION",
            MessageKind::SessionEnd => "SESSION_END",
        }
    }
}

impl FromStr for MessageKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "BASIS_ANNOUNCE" => Ok(MessageKind::BasisAnnounce),
            "PAIR_ANNOUNCE" => Ok(MessageKind::PairAnnounce),
            "SIFT_DECISION" => Ok(MessageKind::SiftDecision),
            "SESSION_END" => Ok(MessageKind::SessionEnd),
            other => Err(Error::Decode {
                field: "kind",
                message: format!("unknown kind `{other}`"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    pub round: u64,
    pub sender: Party,
    pub kind: MessageKind,
    pub payload: Vec<u64>,
}

impl Message {
    pub fn new(round: u64, sender: Party, kind: MessageKind, payload: Vec<u64>) -> Self {
        Self {
            round,
            sender,
            kind,
            payload,
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let payload: Vec<String> = self.payload.iter().map(|v| v.to_string()).collect();
        write!(
            f,
            "round={} from={} kind={} payload={}",
            self.round,
            self.sender.tag(),
            self.kind.tag(),
            payload.join(",")
        )
    }
}

/// One newline-terminated line.
pub fn encode(m: &Message) -> String {
    format!("{m}\n")
}

fn field<'a>(part: Option<&'a str>, name: &'static str) -> Result<&'a str> {
    let part = part.ok_or(Error::Decode {
        field: name,
        message: format!("missing `{name}=`"),
    })?;
    part.strip_prefix(name)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| Error::Decode {
            field: name,
            message: format!("expected `{name}=`, found `{part}`"),
        })
}

fn parse_u64(field_name: &'static str, s: &str) -> Result<u64> {
    // reject signs and whitespace that `parse` would otherwise accept
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(Error::Decode {
            field: field_name,
            message: format!("`{s}` is not a nonnegative integer"),
        });
    }
    s.parse().map_err(|_| Error::Decode {
        field: field_name,
        message: format!("`{s}` is out of range"),
    })
}

pub fn decode(line: &str) -> Result<Message> {
    let line = line.trim_end();
    let mut parts = line.split(' ');
    let round = parse_u64("round", field(parts.next(), "round")?)?;
    let sender = match field(parts.next(), "from")? {
        "A" => Party::Alice,
        "B" => Party::Bob,
        other => {
            return Err(Error::Decode {
                field: "from",
                message: format!("unknown sender `{other}`"),
            })
        }
    };
    let kind: MessageKind = field(parts.next(), "kind")?.parse()?;
    let raw = field(parts.next(), "payload")?;
    let payload = if raw.is_empty() {
        Vec::new()
    } else {
        raw.split(',')
            .map(|v| parse_u64("payload", v))
            .collect::<Result<Vec<u64>>>()?
    };
    if let Some(extra) = parts.next() {
        return Err(Error::Decode {
            field: "payload",
            message: format!("unexpected trailing field `{extra}`"),
        });
    }
    Ok(Message {
        round,
        sender,
        kind,
        payload,
    })
}

pub fn encode_batch(messages: &[Message]) -> String {
    let mut out = format!("batch={}\n", messages.len());
    for m in messages {
        out.push_str(&encode(m));
    }
    out
}

/// Parses the `batch=<n>` header line.
pub fn decode_batch_header(line: &str) -> Result<Option<usize>> {
    match line.trim_end().strip_prefix("batch=") {
        None => Ok(None),
        Some(n) => Ok(Some(parse_u64("batch", n)? as usize)),
    }
}

pub fn decode_batch(text: &str) -> Result<Vec<Message>> {
    let mut lines = text.lines();
    let head = lines.next().ok_or(Error::Decode {
        field: "batch",
        message: "empty input".into(),
    })?;
    let n = decode_batch_header(head)?.ok_or(Error::Decode {
        field: "batch",
        message: format!("expected `batch=<n>`, found `{head}`"),
    })?;
    let msgs = lines.by_ref().take(n).map(decode).collect::<Result<Vec<_>>>()?;
    if msgs.len() != n {
        return Err(Error::Decode {
            field: "batch",
            message: format!("batch declares {n} messages, found {}", msgs.len()),
        });
    }
    if lines.any(|l| !l.trim_end().is_empty()) {
        return Err(Error::Decode {
            field: "batch",
            message: "content after batch".into(),
        });
    }
    Ok(msgs)
}

/// Reliable, order-preserving message exchange with the other party.
pub trait Transport {
    fn send(&mut self, m: Message) -> Result<()>;
    fn receive(&mut self) -> Result<Message>;
}

/// Per-direction round monotonicity.
#[derive(Debug, Default)]
struct RoundGuard {
    last: Option<u64>,
}

impl RoundGuard {
    fn check(&mut self, m: &Message) -> Result<()> {
        if let Some(last) = self.last {
            if m.round < last {
                return Err(Error::Transport {
                    round: m.round,
                    message: format!("round decreased from {last}"),
                });
            }
        }
        self.last = Some(m.round);
        Ok(())
    }
}

/// One end of an in-process pair.
#[derive(Debug)]
pub struct InProcEndpoint {
    tx: SyncSender<Message>,
    rx: Receiver<Message>,
    sent: RoundGuard,
    received: RoundGuard,
}

pub const DEFAULT_CAPACITY: usize = 1024;

/// Two endpoints joined by a bounded FIFO in each direction.
pub fn inproc_pair() -> (InProcEndpoint, InProcEndpoint) {
    inproc_pair_with_capacity(DEFAULT_CAPACITY)
}

pub fn inproc_pair_with_capacity(capacity: usize) -> (InProcEndpoint, InProcEndpoint) {
    let (tx_ab, rx_ab) = sync_channel(capacity);
    let (tx_ba, rx_ba) = sync_channel(capacity);
    (
        InProcEndpoint {
            tx: tx_ab,
            rx: rx_ba,
            sent: RoundGuard::default(),
            received: RoundGuard::default(),
        },
        InProcEndpoint {
            tx: tx_ba,
            rx: rx_ab,
            sent: RoundGuard::default(),
            received: RoundGuard::default(),
        },
    )
}

impl Transport for InProcEndpoint {
    fn send(&mut self, m: Message) -> Result<()> {
        self.sent.check(&m)?;
        self.tx.send(m).map_err(|_| Error::Closed)
    }

    fn receive(&mut self) -> Result<Message> {
        let m = self.rx.recv().map_err(|_| Error::Closed)?;
        self.received.check(&m)?;
        Ok(m)
    }
}

/// Endpoint speaking the line format over any byte stream.
pub struct StreamEndpoint<R: BufRead, W: Write> {
    reader: R,
    writer: W,
    pending: std::collections::VecDeque<Message>,
    sent: RoundGuard,
    received: RoundGuard,
}

impl<R: BufRead, W: Write> StreamEndpoint<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Self {
            reader,
            writer,
            pending: Default::default(),
            sent: RoundGuard::default(),
            received: RoundGuard::default(),
        }
    }

    /// Sends several messages as one `batch=<n>` frame.
    pub fn send_batch(&mut self, messages: &[Message]) -> Result<()> {
        for m in messages {
            self.sent.check(m)?;
        }
        self.writer.write_all(encode_batch(messages).as_bytes())?;
        self.writer.flush()?;
        Ok(())
    }

    fn read_line(&mut self) -> Result<String> {
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(Error::Closed);
        }
        Ok(line)
    }
}

impl<R: BufRead, W: Write> Transport for StreamEndpoint<R, W> {
    fn send(&mut self, m: Message) -> Result<()> {
        self.sent.check(&m)?;
        self.writer.write_all(encode(&m).as_bytes())?;
        self.writer.flush()?;
        Ok(())
    }

    fn receive(&mut self) -> Result<Message> {
        if self.pending.is_empty() {
            let line = self.read_line()?;
            match decode_batch_header(&line)? {
                Some(n) => {
                    for _ in 0..n {
                        let l = self.read_line()?;
                        self.pending.push_back(decode(&l)?);
                    }
                }
                None => self.pending.push_back(decode(&line)?),
            }
        }
        let m = self.pending.pop_front().ok_or(Error::Decode {
            field: "batch",
            message: "empty batch".into(),
        })?;
        self.received.check(&m)?;
        Ok(m)
    }
}

pub type TcpEndpoint = StreamEndpoint<BufReader<TcpStream>, TcpStream>;

/// Two endpoints connected through a TCP socket on 127.0.0.1.
pub fn tcp_loopback_pair() -> Result<(TcpEndpoint, TcpEndpoint)> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let addr = listener.local_addr()?;
    let client = TcpStream::connect(addr)?;
    let (server, _) = listener.accept()?;
    client.set_nodelay(true)?;
    server.set_nodelay(true)?;
    let a = StreamEndpoint::new(BufReader::new(client.try_clone()?), client);
    let b = StreamEndpoint::new(BufReader::new(server.try_clone()?), server);
    Ok((a, b))
}
