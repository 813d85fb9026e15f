//! Seeded generator for synthetic scenarios.
//!
//! Produces user records with heavy-tailed follower and share counts,
//! diurnal activity histograms and topic-flavoured texts, plus one
//! disinformation item and one correction per strategy for every community.
//! Used by the demo scenarios, the test fixtures and `madd synth`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{
    HistoricalText, Scenario, SimulationParams, TextKind, UserRecord, ACTIVITY_BUCKETS,
};
use crate::content::{ContentItem, Strategy};
use crate::evaluator::EvaluatorConfig;
use crate::powerlaw::{PowerLawFit, PowerLawSampler};
use crate::rng::substream;

const SYNTH_STREAM: u64 = 100;

/// Parameters of a truncated power law used for sampling counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountLaw {
    pub alpha: f64,
    pub lambda: f64,
    pub x_min: u64,
}

impl CountLaw {
    fn sampler(self) -> PowerLawSampler {
        PowerLawSampler::new(PowerLawFit::new(self.alpha, self.lambda, self.x_min))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Community names with their number of regular users.
    pub communities: Vec<(String, usize)>,
    pub seed: u64,
    pub followers: CountLaw,
    /// Law of the heavy tail of share counts.
    pub shares: CountLaw,
    /// Fraction of users drawn from the tail; the rest share fewer than
    /// `shares.x_min` times.
    pub share_tail_fraction: f64,
    /// Probability that a user also talks about a second community.
    pub secondary_interest: f64,
    /// Fraction of shares that are quotes.
    pub quote_fraction: f64,
    pub params: SimulationParams,
}

/// Community sizes of the six-topic setup, 689 users in total.
pub const SIX_COMMUNITIES: [(&str, usize); 6] = [
    ("Entertainment", 124),
    ("Technology", 123),
    ("Sports", 114),
    ("Business", 111),
    ("Politics", 112),
    ("Education", 105),
];

impl SynthConfig {
    pub fn new(communities: Vec<(String, usize)>, seed: u64) -> Self {
        Self {
            communities,
            seed,
            followers: CountLaw {
                alpha: 2.2,
                lambda: 1e-5,
                x_min: 20,
            },
            shares: CountLaw {
                alpha: 1.5,
                lambda: 0.006,
                x_min: 16,
            },
            share_tail_fraction: 0.35,
            secondary_interest: 0.3,
            quote_fraction: 0.3,
            params: SimulationParams {
                rng_seed: seed,
                ..SimulationParams::default()
            },
        }
    }

    pub fn six_communities(seed: u64) -> Self {
        Self::new(
            SIX_COMMUNITIES
                .iter()
                .map(|&(c, n)| (c.to_string(), n))
                .collect(),
            seed,
        )
    }

    /// `n` users in a single community.
    pub fn single(name: &str, n: usize, seed: u64) -> Self {
        Self::new(vec![(name.to_string(), n)], seed)
    }

    /// `k` communities of `n` users each.
    pub fn uniform(k: usize, n: usize, seed: u64) -> Self {
        let names = SIX_COMMUNITIES.iter().map(|&(c, _)| c.to_string());
        let communities = names
            .chain((SIX_COMMUNITIES.len()..).map(|i| format!("Community{i}")))
            .take(k)
            .map(|c| (c, n))
            .collect();
        Self::new(communities, seed)
    }
}

struct TopicWords {
    nouns: &'static [&'static str],
    claim: &'static str,
    fact: &'static str,
    story: &'static str,
}

fn topic_words(community: &str) -> TopicWords {
    match community {
        "Entertainment" => TopicWords {
            nouns: &["movie", "album", "concert", "series", "premiere", "celebrity"],
            claim: "Shocking: the lead actor of the summer blockbuster was secretly replaced by a digital double for the whole film!",
            fact: "According to the studio's production report and the union's 2024 data, the lead actor filmed all 84 shooting days in person.",
            story: "My cousin worked as an extra on that set. She watched the lead actor rehearse the same scene twelve times in the rain.",
        },
        "Technology" => TopicWords {
            nouns: &["phone", "update", "chip", "app", "startup", "battery"],
            claim: "Wake up: the new phone update secretly records every conversation and sends it to advertisers!",
            fact: "An independent security study of the update traffic found 0 audio uploads; the vendor's transparency report lists the 3 data types collected.",
            story: "I spent a weekend watching my own network traffic after installing the update. Nothing left the phone while I talked, and I sleep better now.",
        },
        "Sports" => TopicWords {
            nouns: &["match", "league", "coach", "transfer", "stadium", "final"],
            claim: "Exposed: last night's final was fixed and the referee was paid 2 million to hand over the title!",
            fact: "League statistics show the referee's decisions were reviewed by VAR 4 times; the official disciplinary report found no irregularities.",
            story: "I sat behind the goal with my dad, who has refereed for thirty years. He said every big call was one he would have made himself.",
        },
        "Business" => TopicWords {
            nouns: &["market", "stock", "bank", "merger", "earnings", "startup"],
            claim: "Secret memo: the national bank will freeze all savings accounts next Monday, withdraw your money now!",
            fact: "According to the central bank's statement and deposit insurance data, no freeze is planned and deposits up to 100,000 remain insured.",
            story: "My neighbour runs the local branch. She laughed when I asked, then showed me the queue of worried pensioners she had to calm down all day.",
        },
        "Politics" => TopicWords {
            nouns: &["election", "senate", "policy", "vote", "campaign", "minister"],
            claim: "They don't want you to know: thousands of ballots in the capital were printed with the winner already marked!",
            fact: "The electoral commission's audit report checked 12,400 ballots by hand; every misprint claim was traced to a 2019 photo.",
            story: "I volunteered at a polling station all day. We counted each ballot twice with observers from both parties watching every table.",
        },
        "Education" => TopicWords {
            nouns: &["school", "exam", "teacher", "university", "course", "student"],
            claim: "Guaranteed leak: the national exam answers are already online and the ministry is covering it up!",
            fact: "The exam board's report confirms papers are printed 48 hours before the test; the circulating file matches a 2021 practice paper.",
            story: "My daughter's teacher compared the leaked file with old practice sheets in class. The kids laughed when they recognised last year's questions.",
        },
        _ => TopicWords {
            nouns: &["news", "event", "community", "update", "story", "discussion"],
            claim: "Shocking secret: the organisers cancelled everything and are hiding it from members!",
            fact: "According to the organisers' published schedule and attendance data, all 6 events took place as planned.",
            story: "I went to the last meetup myself. It was packed, the coffee was bad and nobody had heard of any cancellation.",
        },
    }
}

const VERBS: &[&str] = &[
    "loving",
    "following",
    "debating",
    "reading about",
    "excited about",
    "skeptical of",
];

fn pick<'a, R: Rng>(rng: &mut R, items: &[&'a str]) -> &'a str {
    items[rng.random_range(0..items.len())]
}

fn user_text<R: Rng>(rng: &mut R, home: &str, second: Option<&str>) -> String {
    let words = topic_words(home);
    let mut text = format!(
        "{} the new {} in {} today",
        pick(rng, VERBS),
        pick(rng, words.nouns),
        home
    );
    if let Some(other) = second {
        let w = topic_words(other);
        text.push_str(&format!(
            ", also thinking about the {} in {other}",
            pick(rng, w.nouns)
        ));
    }
    text
}

/// Counts per hour of day peaked around a user-specific hour.
fn activity_histogram<R: Rng>(rng: &mut R, events: u64) -> Vec<u64> {
    let peak = rng.random_range(0.0..24.0);
    let sharpness = rng.random_range(0.5..3.0);
    let weights: Vec<f64> = (0..ACTIVITY_BUCKETS)
        .map(|h| {
            let angle = 2.0 * std::f64::consts::PI * (h as f64 - peak) / 24.0;
            (sharpness * angle.cos()).exp() + 0.05
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut hist = vec![0u64; ACTIVITY_BUCKETS];
    for _ in 0..events.max(1) {
        let mut u = rng.random::<f64>() * total;
        let mut h = 0;
        while h + 1 < ACTIVITY_BUCKETS && u >= weights[h] {
            u -= weights[h];
            h += 1;
        }
        hist[h] += 1;
    }
    hist
}

fn make_user<R: Rng>(
    rng: &mut R,
    cfg: &SynthConfig,
    followers: &PowerLawSampler,
    shares: &PowerLawSampler,
    home: &str,
    index: usize,
    names: &[String],
) -> UserRecord {
    let follower_count = followers.sample(rng);
    let share_total = if rng.random::<f64>() < cfg.share_tail_fraction {
        shares.sample(rng).min(1_000_000)
    } else {
        // Occasional sharers: binomial body well below the tail.
        (1..cfg.shares.x_min)
            .filter(|_| rng.random::<f64>() < 0.2)
            .count() as u64
    };
    let quote_count = (0..share_total.min(10_000))
        .filter(|_| rng.random::<f64>() < cfg.quote_fraction)
        .count() as u64;
    let retweet_count = share_total - quote_count;
    let post_count = rng.random_range(5..200);
    let others: Vec<&String> = names.iter().filter(|c| *c != home).collect();
    let second = (!others.is_empty() && rng.random::<f64>() < cfg.secondary_interest)
        .then(|| others[rng.random_range(0..others.len())].as_str());
    let mut historical_texts = Vec::new();
    for (i, kind) in [
        TextKind::Post,
        TextKind::Post,
        TextKind::Retweet,
        TextKind::Quote,
    ]
    .into_iter()
    .enumerate()
    {
        historical_texts.push(HistoricalText {
            kind,
            text: user_text(rng, home, second.filter(|_| i < 2)),
        });
    }
    let events = (post_count + share_total).min(400);
    UserRecord {
        user_id: format!("{}-{index:04}", home.to_lowercase()),
        follower_count,
        following_count: rng.random_range(10..2000),
        description: format!(
            "Posts mostly about {} and the occasional {}",
            home,
            pick(rng, topic_words(home).nouns)
        ),
        post_count,
        retweet_count,
        quote_count,
        historical_texts,
        activity_histogram: activity_histogram(rng, events),
        home_community: Some(home.to_string()),
    }
}

/// Disinformation plus fact- and narrative-based corrections for `community`.
pub fn content_for(community: &str) -> Vec<ContentItem> {
    let w = topic_words(community);
    let slug = community.to_lowercase();
    vec![
        ContentItem::disinformation(&format!("dis-{slug}"), community, w.claim),
        ContentItem::correction(
            &format!("fact-{slug}"),
            community,
            Strategy::FactBased,
            w.fact,
        ),
        ContentItem::correction(
            &format!("story-{slug}"),
            community,
            Strategy::NarrativeBased,
            w.story,
        ),
    ]
}

/// Builds a validated scenario from `cfg`.
pub fn generate(cfg: &SynthConfig) -> Scenario {
    let followers = cfg.followers.sampler();
    let shares = cfg.shares.sampler();
    let names: Vec<String> = cfg.communities.iter().map(|(c, _)| c.clone()).collect();
    let mut users = Vec::new();
    for (ci, (community, size)) in cfg.communities.iter().enumerate() {
        let mut rng: ChaCha8Rng = substream(cfg.seed, &[SYNTH_STREAM, ci as u64]);
        for i in 0..*size {
            users.push(make_user(
                &mut rng, cfg, &followers, &shares, community, i, &names,
            ));
        }
    }
    let scenario = Scenario {
        params: SimulationParams {
            rng_seed: cfg.seed,
            ..cfg.params.clone()
        },
        users,
        content: names.iter().flat_map(|c| content_for(c)).collect(),
        communities: names,
        evaluator: EvaluatorConfig::default(),
    };
    scenario.validate().expect("generated scenario is valid");
    scenario
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_communities_have_689_users() {
        let s = generate(&SynthConfig::six_communities(1));
        assert_eq!(s.users.len(), 689);
        assert_eq!(s.communities.len(), 6);
        assert_eq!(s.content.len(), 18);
    }

    #[test]
    fn generation_is_seeded() {
        let a = generate(&SynthConfig::uniform(2, 20, 5));
        let b = generate(&SynthConfig::uniform(2, 20, 5));
        let c = generate(&SynthConfig::uniform(2, 20, 6));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn histograms_have_activity() {
        let s = generate(&SynthConfig::single("Sports", 30, 2));
        for u in &s.users {
            assert_eq!(u.activity_histogram.len(), ACTIVITY_BUCKETS);
            assert!(u.activity_histogram.iter().sum::<u64>() > 0);
            assert!(u.follower_count >= 20);
        }
    }
}
