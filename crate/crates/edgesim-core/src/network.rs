//! Link contention, transfer delays and the metro-network queueing delay.
//!
//! Three link families connect the tiers:
//!
//! * **WLAN** — one access network per edge location; every task crosses its
//!   home WLAN on upload and download. Per-client bandwidth degrades linearly
//!   with the number of concurrent transfers until a hard saturation count.
//! * **MAN** — the metro network between edge locations, modelled as an
//!   M/M/1 queue: sojourn `1 / (mu - lambda) + propagation`, with the arrival
//!   rate `lambda` estimated from a sliding window of recent MAN departures.
//! * **WAN** — one uplink to the cloud per edge location, with the same
//!   degradation law as the WLAN plus per-transfer bandwidth reservations,
//!   so the remaining WAN bandwidth of a location is observable.
//!
//! A transfer's delay is fixed when it starts, from the link state at that
//! instant; transfers already in flight are never re-priced. Multi-hop legs
//! (WLAN+MAN, WLAN+WAN) are acquired atomically: if any hop is saturated the
//! whole leg fails and no occupancy leaks.

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Which physical link a failure concerns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkScope {
    Wlan(usize),
    Man,
    Wan(usize),
}

impl fmt::Display for LinkScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkScope::Wlan(id) => write!(f, "WLAN {id}"),
            LinkScope::Man => f.write_str("MAN"),
            LinkScope::Wan(id) => write!(f, "WAN {id}"),
        }
    }
}

/// Why a transfer could not start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetworkError {
    /// The M/M/1 queue has no finite sojourn: observed arrivals meet or
    /// exceed the service rate.
    ManSaturated { lambda: f64, mu: f64 },
    /// A WLAN or WAN already carries its maximum concurrent transfers.
    LinkSaturated { scope: LinkScope },
}

impl fmt::Display for NetworkError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetworkError::ManSaturated { lambda, mu } => {
                write!(f, "MAN saturated: arrival rate {lambda} >= service rate {mu}")
            }
            NetworkError::LinkSaturated { scope } => write!(f, "{scope} is saturated"),
        }
    }
}

/// Shared-medium bandwidth law: per-client megabits per second as a function
/// of the concurrent transfer count.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BandwidthTable {
    /// Bandwidth a lone client gets, Mbps.
    pub nominal_mbps: f64,
    /// Maximum concurrent transfers; beyond this the link rejects.
    pub saturation_clients: usize,
    /// Fixed per-transfer propagation delay, seconds.
    pub propagation_s: f64,
}

impl Default for BandwidthTable {
    fn default() -> Self {
        BandwidthTable {
            nominal_mbps: 100.0,
            saturation_clients: 50,
            propagation_s: 0.0,
        }
    }
}

impl BandwidthTable {
    /// Per-client bandwidth with `clients` concurrent transfers (including
    /// the one asking): `nominal * (1 - (clients-1)/saturation)`, linearly
    /// degrading but strictly positive through the saturation count.
    /// `None` when the link cannot take another transfer.
    pub fn effective_mbps(&self, clients: usize) -> Option<f64> {
        if clients == 0 || clients > self.saturation_clients {
            return None;
        }
        let degraded = 1.0 - (clients as f64 - 1.0) / self.saturation_clients as f64;
        Some(self.nominal_mbps * degraded)
    }
}

/// Time to push `size_kb` kilobytes through `effective_mbps` megabits per
/// second, plus propagation: `size * 8 / (1024 * bw) + propagation`.
pub fn transfer_delay_s(size_kb: f64, effective_mbps: f64, propagation_s: f64) -> f64 {
    debug_assert!(effective_mbps > 0.0);
    size_kb * 8.0 / (1024.0 * effective_mbps) + propagation_s
}

/// M/M/1 sojourn time `1 / (mu - lambda) + propagation`. Fails when the
/// queue is unstable (`lambda >= mu`).
pub fn mm1_delay_s(mu: f64, lambda: f64, propagation_s: f64) -> Result<f64, NetworkError> {
    if lambda >= mu {
        return Err(NetworkError::ManSaturated { lambda, mu });
    }
    Ok(1.0 / (mu - lambda) + propagation_s)
}

/// Network-wide configuration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct NetworkConfig {
    /// Per-location access network.
    pub wlan: BandwidthTable,
    /// Per-location uplink to the cloud.
    pub wan: BandwidthTable,
    /// MAN M/M/1 service rate, tasks per second.
    pub man_service_rate: f64,
    /// Fixed MAN propagation delay, seconds.
    pub man_propagation_s: f64,
    /// Length of the sliding window over MAN departures used to estimate the
    /// arrival rate, seconds.
    pub man_window_s: f64,
    /// Value reported for the MAN-delay state feature when the queue is
    /// saturated (and an upper clamp on the reported delay).
    pub man_state_cap_s: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            wlan: BandwidthTable {
                nominal_mbps: 100.0,
                saturation_clients: 50,
                propagation_s: 0.0,
            },
            wan: BandwidthTable {
                nominal_mbps: 20.0,
                saturation_clients: 20,
                propagation_s: 0.02,
            },
            man_service_rate: 10.0,
            man_propagation_s: 0.005,
            man_window_s: 10.0,
            man_state_cap_s: 1.0,
        }
    }
}

/// Which hops a task transfer crosses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Device to the edge server of its own location: WLAN only.
    HomeEdge,
    /// Device to another location's edge server: WLAN + MAN.
    RemoteEdge,
    /// Device to the cloud: WLAN + WAN.
    Cloud,
}

/// Occupancy taken by one in-flight transfer; hand it back via
/// [`NetworkModel::end_transfer`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransferLease {
    pub wlan_id: usize,
    /// Set when the leg crosses the WAN: `(location, reserved Mbps)`.
    pub wan: Option<(usize, f64)>,
    /// True when the leg crosses the MAN.
    pub man: bool,
    /// True when the leg's completion should count as a MAN departure in the
    /// arrival-rate window (task offloads do; result downloads do not).
    pub man_counts_as_departure: bool,
    /// Total leg delay fixed at start, seconds.
    pub delay_s: f64,
}

/// Mutable link state for one run.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    config: NetworkConfig,
    wlan_active: Vec<usize>,
    wan_active: Vec<usize>,
    wan_reserved_mbps: Vec<f64>,
    /// Completion timestamps of recent MAN task transfers.
    man_departures: VecDeque<f64>,
}

impl NetworkModel {
    pub fn new(locations: usize, config: NetworkConfig) -> Self {
        NetworkModel {
            config,
            wlan_active: alloc::vec![0; locations],
            wan_active: alloc::vec![0; locations],
            wan_reserved_mbps: alloc::vec![0.0; locations],
            man_departures: VecDeque::new(),
        }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// Observed MAN arrival rate: departures inside the sliding window,
    /// divided by the window length. Prunes expired entries.
    pub fn man_arrival_rate(&mut self, now: f64) -> f64 {
        let horizon = now - self.config.man_window_s;
        while matches!(self.man_departures.front(), Some(&t) if t < horizon) {
            self.man_departures.pop_front();
        }
        self.man_departures.len() as f64 / self.config.man_window_s
    }

    /// Current M/M/1 sojourn estimate for a MAN hop.
    pub fn man_delay_estimate(&mut self, now: f64) -> Result<f64, NetworkError> {
        let lambda = self.man_arrival_rate(now);
        mm1_delay_s(self.config.man_service_rate, lambda, self.config.man_propagation_s)
    }

    /// MAN delay as a bounded state feature: the M/M/1 estimate clamped to
    /// the configured cap, and the cap itself when the queue is saturated.
    pub fn man_delay_for_state(&mut self, now: f64) -> f64 {
        let cap = self.config.man_state_cap_s;
        match self.man_delay_estimate(now) {
            Ok(delay) => delay.min(cap),
            Err(_) => cap,
        }
    }

    /// WAN bandwidth not yet reserved by in-flight transfers at `location`,
    /// Mbps, floored at zero.
    pub fn remaining_wan_bandwidth(&self, location: usize) -> f64 {
        (self.config.wan.nominal_mbps - self.wan_reserved_mbps[location]).max(0.0)
    }

    /// Concurrent transfers currently on `location`'s WLAN.
    pub fn wlan_active(&self, location: usize) -> usize {
        self.wlan_active[location]
    }

    /// Concurrent transfers currently on `location`'s WAN uplink.
    pub fn wan_active(&self, location: usize) -> usize {
        self.wan_active[location]
    }

    /// Start a transfer of `size_kb` along `route` from `home_wlan`.
    ///
    /// Prices every hop from the link state at `now`, then atomically takes
    /// occupancy on all of them; on any saturation nothing is taken. The
    /// returned lease carries the total delay (sum of the hop delays).
    pub fn begin_transfer(
        &mut self,
        route: Route,
        home_wlan: usize,
        size_kb: f64,
        now: f64,
        counts_as_man_departure: bool,
    ) -> Result<TransferLease, NetworkError> {
        let wlan = &self.config.wlan;
        let wlan_bw = wlan
            .effective_mbps(self.wlan_active[home_wlan] + 1)
            .ok_or(NetworkError::LinkSaturated {
                scope: LinkScope::Wlan(home_wlan),
            })?;
        let mut delay = transfer_delay_s(size_kb, wlan_bw, wlan.propagation_s);

        let mut wan_share = None;
        let mut crosses_man = false;
        match route {
            Route::HomeEdge => {}
            Route::RemoteEdge => {
                delay += self.man_delay_estimate(now)?;
                crosses_man = true;
            }
            Route::Cloud => {
                let wan = &self.config.wan;
                let wan_bw = wan
                    .effective_mbps(self.wan_active[home_wlan] + 1)
                    .ok_or(NetworkError::LinkSaturated {
                        scope: LinkScope::Wan(home_wlan),
                    })?;
                delay += transfer_delay_s(size_kb, wan_bw, wan.propagation_s);
                wan_share = Some((home_wlan, wan_bw));
            }
        }

        // All hops priced successfully: commit occupancy.
        self.wlan_active[home_wlan] += 1;
        if let Some((loc, share)) = wan_share {
            self.wan_active[loc] += 1;
            self.wan_reserved_mbps[loc] += share;
        }
        Ok(TransferLease {
            wlan_id: home_wlan,
            wan: wan_share,
            man: crosses_man,
            man_counts_as_departure: crosses_man && counts_as_man_departure,
            delay_s: delay,
        })
    }

    /// Finish a transfer: release all occupancy the lease holds and, for
    /// offload legs over the MAN, record the departure for the arrival-rate
    /// window.
    pub fn end_transfer(&mut self, lease: &TransferLease, now: f64) {
        debug_assert!(self.wlan_active[lease.wlan_id] > 0, "WLAN occupancy underflow");
        self.wlan_active[lease.wlan_id] -= 1;
        if let Some((loc, share)) = lease.wan {
            debug_assert!(self.wan_active[loc] > 0, "WAN occupancy underflow");
            self.wan_active[loc] -= 1;
            self.wan_reserved_mbps[loc] = (self.wan_reserved_mbps[loc] - share).max(0.0);
        }
        if lease.man_counts_as_departure {
            self.man_departures.push_back(now);
        }
    }
}
