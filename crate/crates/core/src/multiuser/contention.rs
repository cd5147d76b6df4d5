use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelContention {
    pub contenders: Vec<usize>,
    pub winner: Option<usize>,
    pub free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContentionOutcome {
    pub channels: Vec<ChannelContention>,
}

impl ContentionOutcome {
    pub fn winners(&self) -> impl Iterator<Item = usize> + '_ {
        self.channels.iter().filter_map(|c| c.winner)
    }
}

/// Winner among `contenders` on a free channel: the smallest of independent
/// uniform backoff draws. A lone contender wins without a draw.
pub fn backoff_winner<R: Rng + ?Sized>(contenders: &[usize], rng: &mut R) -> Option<usize> {
    match contenders.len() {
        0 => None,
        1 => Some(contenders[0]),
        _ => {
            let draws: Vec<f64> = contenders.iter().map(|_| rng.gen::<f64>()).collect();
            let min = draws.iter().copied().fold(f64::INFINITY, f64::min);
            let tied: Vec<usize> = (0..draws.len()).filter(|&i| draws[i] == min).collect();
            let pick = if tied.len() == 1 {
                tied[0]
            } else {
                tied[rng.gen_range(0..tied.len())]
            };
            Some(contenders[pick])
        }
    }
}

/// Resolves one slot. `contenders[i]` lists the users sensing channel `i`.
/// Busy channels consume no draws.
pub fn contention_resolve<R: Rng + ?Sized>(contenders: &[Vec<usize>], free: &[bool], rng: &mut R) -> ContentionOutcome {
    let channels = contenders
        .iter()
        .zip(free)
        .map(|(users, &is_free)| ChannelContention {
            contenders: users.clone(),
            winner: if is_free { backoff_winner(users, rng) } else { None },
            free: is_free,
        })
        .collect();
    ContentionOutcome { channels }
}
