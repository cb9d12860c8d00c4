"""Deterministic discrete-event simulator for the staleness-aware
protocols and their baselines.

One logically single-threaded event loop drives everything: events are
applied in (time, seq) order, where seq is assigned at enqueue, so a
(config, seed) pair always reproduces the same trajectory bit for bit.
Time is simulated seconds; transfers cost model_dim / bandwidth and each
local epoch costs the device's sampled compute time.

Protocols:
  fedasmu   asynchronous: periodic triggering, mid-training fresh-model
            merges, dynamic server aggregation, staleness discard
  fedssmu   synchronous rounds with immediate sequential aggregation and
            intra-round fresh-model fetches
  fedasync  immediate aggregation with a static polynomial staleness
            discount (also: fedasmu with everything dynamic disabled)
  fedbuff   like fedasync but aggregates the mean of K buffered uploads
  fedavg    classic synchronous data-size-weighted averaging
"""

import heapq
from dataclasses import dataclass, field, replace

import numpy as np

from .aggregation import (
    DISCARD,
    AggregationContext,
    DeviceControls,
    ServerControls,
    _alpha_from_staleness,
    _beta_from_staleness,
    _device_control_step,
    _server_control_step,
    alpha_weight,
    beta_weight,
    check_staleness,
    device_merge,
    server_merge,
    update_device_controls,
    update_server_controls,
)
from .data import DatasetSpec, dirichlet_partition, make_synthetic, sample_minibatch, train_test_split
from .errors import InvalidArgumentError, SimulationInvariantError
from .kernels import BACKEND as KERNEL_BACKEND
from .models import ModelSpec, evaluate, grad, init_params, loss, sgd_step
from .slot_policy import MetaPolicy, QTable, reward, select_slot_meta, select_slot_q, update_meta, update_q

FEDASMU = "fedasmu"
FEDSSMU = "fedssmu"
FEDAVG = "fedavg"
FEDASYNC = "fedasync"
FEDBUFF = "fedbuff"
ASYNC_PROTOCOLS = (FEDASMU, FEDASYNC, FEDBUFF)
SYNC_PROTOCOLS = (FEDSSMU, FEDAVG)
PROTOCOLS = ASYNC_PROTOCOLS + SYNC_PROTOCOLS

TRIGGER_DEVICES = "TriggerDevices"
EPOCH_DONE = "EpochDone"
FRESH_REQUEST = "FreshRequest"
FRESH_ARRIVE = "FreshArrive"
UPLOAD_ARRIVE = "UploadArrive"
EVALUATE = "Evaluate"

ALPHA_DYNAMIC = "dynamic"
ALPHA_STATIC_POLY = "static-poly"
ALPHA_HARMONIC = "harmonic"


def transfer_time(model_dim, bw):
    """Simulated seconds to move model_dim model-units over a link."""
    if bw <= 0:
        raise InvalidArgumentError("bandwidth must be positive")
    return model_dim / bw


@dataclass(frozen=True)
class DeviceProfile:
    device_id: int
    epoch_compute_time: float
    uplink_bw: float
    downlink_bw: float
    partition_id: int


@dataclass(frozen=True)
class Event:
    time: float
    seq: int
    kind: str
    device: int = None
    payload: tuple = None


@dataclass(frozen=True)
class MetricsRecord:
    sim_time: float
    version: int
    eval_loss: float
    eval_acc: float
    discarded: int
    protocol: str
    seed: int

    def to_dict(self):
        return {
            "sim_time": self.sim_time,
            "version": self.version,
            "eval_loss": self.eval_loss,
            "eval_acc": self.eval_acc,
            "discarded": self.discarded,
            "protocol": self.protocol,
            "seed": self.seed,
        }


@dataclass
class RunResult:
    protocol: str
    seed: int
    records: list
    final_params: np.ndarray
    final_version: int
    accepted_count: int
    discarded_count: int
    sim_time_end: float
    aggregation_audit: list
    epochs_completed: dict  # device -> epochs run in completed rounds
    rounds_completed: dict  # device -> completed local rounds
    fresh_requests: dict = field(default_factory=dict)  # device -> requests sent
    merges: dict = field(default_factory=dict)  # device -> fresh-model merges
    version_history: dict = field(default_factory=dict)  # version -> params
    kernel_backend: str = KERNEL_BACKEND

    @property
    def final_acc(self):
        return self.records[-1].eval_acc


class _DeviceState:
    __slots__ = (
        "profile",
        "rng",
        "server_controls",
        "device_controls",
        "qtable",
        "busy",
        "base_version",
        "local_params",
        "epochs_done",
        "slot",
        "requested",
        "pending_batch",
        "rounds_started",
        "rounds_completed",
        "epochs_completed",
        "fresh_requests",
        "merges",
        "slot_source",
        "q_transition",
        "prev_slot",
        "prev_agg",
    )

    def __init__(self, profile, rng, server_controls, device_controls, qtable):
        self.profile = profile
        self.rng = rng
        self.server_controls = server_controls
        self.device_controls = device_controls
        self.qtable = qtable
        self.busy = False
        self.base_version = 0
        self.local_params = None
        self.epochs_done = 0
        self.slot = 0
        self.requested = False
        self.pending_batch = None
        self.rounds_started = 0
        self.rounds_completed = 0
        self.epochs_completed = 0
        self.fresh_requests = 0
        self.merges = 0
        self.slot_source = None
        self.q_transition = None
        self.prev_slot = 0
        self.prev_agg = None


def _derived_seed(seedseq):
    return int(seedseq.generate_state(1, np.uint64)[0])


def prepare_data(config, seed):
    """(train, test, partitions) for a run seed.

    Dataset, split, and partition seeds derive from the run seed unless
    the config pins dataset_seed explicitly; the recipe is shared by the
    simulators and the harness's centralized-training oracle.
    """
    kids = np.random.SeedSequence(seed).spawn(3)
    ds_seed = config.dataset_seed if config.dataset_seed is not None else _derived_seed(kids[0])
    dataset = make_synthetic(
        DatasetSpec(
            num_samples=config.num_samples,
            input_dim=config.input_dim,
            num_classes=config.num_classes,
            class_separation=config.class_separation,
            noise_std=config.noise_std,
            seed=ds_seed,
        )
    )
    train, test = train_test_split(dataset, config.test_fraction, _derived_seed(kids[1]))
    partitions = dirichlet_partition(train, config.m, config.concentration, _derived_seed(kids[2]))
    return train, test, partitions


def _validate_run_config(config, protocol):
    problems = []
    if protocol not in PROTOCOLS:
        problems.append(f"unknown protocol {protocol!r}")
    if config.m_prime > config.m:
        problems.append("m_prime must be <= m")
    if config.tau < 1:
        problems.append("tau must be >= 1")
    if config.local_epochs < 2:
        problems.append("local_epochs must be >= 2")
    if problems:
        raise InvalidArgumentError("; ".join(problems))


class _BaseSim:
    def __init__(self, config, protocol, seed):
        _validate_run_config(config, protocol)
        self.cfg = config
        self.protocol = protocol
        self.seed = seed
        self.spec = ModelSpec(
            kind=config.model_kind,
            input_dim=config.input_dim,
            num_classes=config.num_classes,
            hidden_dim=config.hidden_dim,
        )
        self.model_dim = self.spec.param_count

        root = np.random.SeedSequence(seed)
        kids = root.spawn(6)  # kids[0..2] are consumed inside prepare_data
        self.train, self.test, self.partitions = prepare_data(config, seed)
        profile_rng = np.random.default_rng(kids[3])
        init_rng = np.random.default_rng(kids[4])
        self.select_rng = np.random.default_rng(kids[5])
        device_seqs = root.spawn(config.m)

        epoch_times = profile_rng.uniform(
            config.epoch_time_base,
            config.heterogeneity_ratio * config.epoch_time_base,
            size=config.m,
        )
        uplink = config.uplink_bw / config.bandwidth_scale
        downlink = config.downlink_bw / config.bandwidth_scale
        server_controls = ServerControls(
            lam=config.lambda0,
            sigma=config.sigma0,
            iota=config.iota0,
            eta_lambda=config.eta_lambda,
            eta_sigma=config.eta_sigma,
            eta_iota=config.eta_iota,
            mu_alpha=config.mu_alpha,
        )
        device_controls = DeviceControls(
            gamma=config.gamma0,
            upsilon=config.upsilon0,
            eta_gamma=config.eta_gamma,
            eta_upsilon=config.eta_upsilon,
            mu_beta=config.mu_beta,
        )
        self.devices = [
            _DeviceState(
                DeviceProfile(i, float(epoch_times[i]), uplink, downlink, i),
                np.random.default_rng(device_seqs[i]),
                server_controls,
                device_controls,
                QTable.fresh(config.local_epochs, config.q_phi, config.q_psi, config.epsilon),
            )
            for i in range(config.m)
        ]
        self.meta = MetaPolicy.uniform(
            config.local_epochs, rho=config.rho, eta_rl=config.eta_rl, epsilon=config.epsilon
        )

        self.global_params = init_params(self.spec, init_rng)
        self.version = 1
        self.history = {1: self.global_params}
        self.time = 0.0
        self.heap = []
        self._seq = 0
        self.busy_count = 0
        self.accepted_count = 0
        self.discarded_count = 0
        self.records = []
        self.audit = []
        self._configure_protocol()

    def _configure_protocol(self):
        cfg = self.cfg
        if self.protocol == FEDASMU:
            self.dynamic_server = not cfg.disable_dynamic_server
            self.merging = not cfg.disable_device_merge
            self.alpha_mode = cfg.server_alpha_mode
            self.buffer_k = 0
        elif self.protocol == FEDASYNC:
            self.dynamic_server = False
            self.merging = False
            self.alpha_mode = ALPHA_STATIC_POLY
            self.buffer_k = 0
        elif self.protocol == FEDBUFF:
            self.dynamic_server = False
            self.merging = False
            self.alpha_mode = ALPHA_STATIC_POLY
            self.buffer_k = cfg.fedbuff_k
        elif self.protocol == FEDSSMU:
            self.dynamic_server = not cfg.disable_dynamic_server
            self.merging = not cfg.disable_device_merge
            self.alpha_mode = cfg.server_alpha_mode
            self.buffer_k = 0
        else:  # fedavg
            self.dynamic_server = False
            self.merging = False
            self.alpha_mode = None
            self.buffer_k = 0
        self.buffer = []

    # -- queue ---------------------------------------------------------

    def _push(self, time, kind, device=None, payload=None):
        self._seq += 1
        heapq.heappush(self.heap, (time, self._seq, Event(time, self._seq, kind, device, payload)))

    def _pop(self):
        time, _, event = heapq.heappop(self.heap)
        self.time = time
        return event

    # -- device lifecycle ----------------------------------------------

    def _choose_slot(self, st):
        cfg = self.cfg
        st.slot_source = None
        st.q_transition = None
        if not self.merging:
            st.slot = 0
            return
        if cfg.slot_override is not None:
            st.slot = cfg.slot_override
        elif st.rounds_started == 1:
            st.slot = select_slot_meta(self.meta, st.rng)
            st.slot_source = "meta"
        else:
            st.qtable = replace(
                st.qtable,
                epsilon=max(st.qtable.epsilon * cfg.q_epsilon_decay, cfg.q_epsilon_floor),
            )
            slot, action = select_slot_q(st.qtable, st.prev_slot, st.rng)
            st.slot = slot
            st.slot_source = "q"
            st.q_transition = (st.prev_slot, action)
        st.prev_slot = st.slot

    def _start_device(self, dev, base_version):
        st = self.devices[dev]
        st.busy = True
        self.busy_count += 1
        st.base_version = base_version
        st.local_params = self.global_params
        st.epochs_done = 0
        st.requested = False
        st.pending_batch = None
        st.rounds_started += 1
        self._choose_slot(st)
        download = transfer_time(self.model_dim, st.profile.downlink_bw)
        if st.slot == 1:
            self._push(self.time + download, FRESH_REQUEST, dev)
        else:
            self._push(self.time + download + st.profile.epoch_compute_time, EPOCH_DONE, dev)

    def _end_device_round(self, dev):
        st = self.devices[dev]
        st.busy = False
        self.busy_count -= 1
        st.rounds_completed += 1
        st.epochs_completed += st.epochs_done

    def _handle_epoch_done(self, dev):
        st = self.devices[dev]
        cfg = self.cfg
        if st.pending_batch is not None:
            batch = st.pending_batch
            st.pending_batch = None
        else:
            batch = sample_minibatch(
                self.partitions[st.profile.partition_id],
                self.train,
                cfg.batch_size,
                st.rng,
                full_batch=cfg.full_batch,
            )
        st.local_params = sgd_step(st.local_params, grad(self.spec, st.local_params, batch), cfg.eta_i)
        st.epochs_done += 1
        if st.epochs_done == cfg.local_epochs:
            upload = transfer_time(self.model_dim, st.profile.uplink_bw)
            self._push(self.time + upload, UPLOAD_ARRIVE, dev, (st.local_params, st.base_version))
        elif st.epochs_done + 1 == st.slot and not st.requested:
            self._push(self.time, FRESH_REQUEST, dev)
        else:
            self._push(self.time + st.profile.epoch_compute_time, EPOCH_DONE, dev)

    def _handle_fresh_arrive(self, dev, payload):
        """Merge a fetched global model into the in-progress local model,
        update device controls and the request-slot policies, then resume
        training. The same minibatch measures the merge reward and feeds
        the next SGD epoch."""
        version_scale, staleness, fresh_params = payload
        st = self.devices[dev]
        cfg = self.cfg
        batch = sample_minibatch(
            self.partitions[st.profile.partition_id],
            self.train,
            cfg.batch_size,
            st.rng,
            full_batch=cfg.full_batch,
        )
        loss_before = loss(self.spec, st.local_params, batch)
        local_grad = grad(self.spec, st.local_params, batch)
        beta = _beta_from_staleness(st.device_controls, version_scale, staleness)
        merged = device_merge(st.local_params, fresh_params, beta)
        st.device_controls = _device_control_step(
            st.device_controls, version_scale, staleness, fresh_params, merged, local_grad
        )
        r = reward(loss_before, loss(self.spec, merged, batch))
        if st.slot_source == "meta":
            self.meta = update_meta(self.meta, st.slot, r)
        elif st.slot_source == "q" and st.q_transition is not None:
            prev_slot, action = st.q_transition
            st.qtable = update_q(st.qtable, prev_slot, action, st.slot, r)
        st.merges += 1
        st.local_params = merged
        st.pending_batch = batch
        self._push(self.time + st.profile.epoch_compute_time, EPOCH_DONE, dev)

    def _record_metrics(self, sim_time, version, params, discarded):
        eval_loss, eval_acc = evaluate(self.spec, params, self.test)
        self.records.append(
            MetricsRecord(
                sim_time=sim_time,
                version=version,
                eval_loss=eval_loss,
                eval_acc=eval_acc,
                discarded=discarded,
                protocol=self.protocol,
                seed=self.seed,
            )
        )

    def _handle_evaluate(self, payload):
        version, params, discarded = payload
        self._record_metrics(self.time, version, params, discarded)

    def _result(self):
        return RunResult(
            protocol=self.protocol,
            seed=self.seed,
            records=self.records,
            final_params=self.global_params,
            final_version=self.version,
            accepted_count=self.accepted_count,
            discarded_count=self.discarded_count,
            sim_time_end=self.time,
            aggregation_audit=self.audit,
            epochs_completed={d: st.epochs_completed for d, st in enumerate(self.devices)},
            rounds_completed={d: st.rounds_completed for d, st in enumerate(self.devices)},
            fresh_requests={d: st.fresh_requests for d, st in enumerate(self.devices)},
            merges={d: st.merges for d, st in enumerate(self.devices)},
            version_history=self.history,
        )


class _AsyncSim(_BaseSim):
    """Event loop for fedasmu / fedasync / fedbuff."""

    def run(self):
        cfg = self.cfg
        self._push(0.0, EVALUATE, payload=(self.version, self.global_params, 0))
        self._push(0.0, TRIGGER_DEVICES)
        while self.heap:
            event = self._pop()
            if event.time > cfg.max_sim_time:
                break
            self._dispatch(event)
            if self.accepted_count >= cfg.T:
                self._drain_evaluations()
                break
        return self._result()

    def _drain_evaluations(self):
        while self.heap:
            event = self._pop()
            if event.kind == EVALUATE:
                self._handle_evaluate(event.payload)

    def _dispatch(self, event):
        if event.kind == TRIGGER_DEVICES:
            self._handle_trigger()
        elif event.kind == EPOCH_DONE:
            self._handle_epoch_done(event.device)
        elif event.kind == FRESH_REQUEST:
            self._handle_fresh_request(event.device)
        elif event.kind == FRESH_ARRIVE:
            self._handle_fresh_arrive(event.device, event.payload)
        elif event.kind == UPLOAD_ARRIVE:
            self._handle_upload(event.device, event.payload)
        elif event.kind == EVALUATE:
            self._handle_evaluate(event.payload)

    def _handle_trigger(self):
        cfg = self.cfg
        if self.busy_count < cfg.m_prime:
            idle = np.array([d for d in range(cfg.m) if not self.devices[d].busy])
            if len(idle):
                count = min(cfg.m_prime, len(idle))
                chosen = self.select_rng.choice(idle, size=count, replace=False)
                for dev in np.sort(chosen):
                    self._start_device(int(dev), base_version=self.version)
        self._push(self.time + cfg.trigger_period, TRIGGER_DEVICES)

    def _handle_fresh_request(self, dev):
        st = self.devices[dev]
        if st.requested:
            raise SimulationInvariantError(f"device {dev} requested twice in one round")
        st.requested = True
        st.fresh_requests += 1
        if self.version > st.base_version:
            payload = (self.version, self.version - st.base_version + 1, self.global_params)
            download = transfer_time(self.model_dim, st.profile.downlink_bw)
            self._push(self.time + download, FRESH_ARRIVE, dev, payload)
        else:
            # No newer model exists; proceed with the epoch immediately.
            self._push(self.time + st.profile.epoch_compute_time, EPOCH_DONE, dev)

    def _static_alpha(self, staleness):
        return self.cfg.fedasync_alpha * staleness ** -self.cfg.fedasync_poly_a

    def _handle_upload(self, dev, payload):
        upload, base = payload
        cfg = self.cfg
        st = self.devices[dev]
        t = self.version
        staleness = t - base + 1
        if check_staleness(t, base, cfg.tau) == DISCARD:
            self.discarded_count += 1
            self.audit.append(
                {
                    "time": self.time,
                    "device": dev,
                    "round": t,
                    "base": base,
                    "staleness": staleness,
                    "accepted": False,
                    "alpha": None,
                }
            )
            self._end_device_round(dev)
            return
        if staleness > cfg.tau:
            raise SimulationInvariantError("admitted an upload beyond the staleness bound")
        if self.buffer_k:
            self.buffer.append(upload)
            alpha = None
            if len(self.buffer) == self.buffer_k:
                mean = np.mean(np.stack(self.buffer), axis=0)
                alpha = cfg.fedasync_alpha
                self._commit(server_merge(self.global_params, mean, alpha))
                self.buffer.clear()
        else:
            if self.dynamic_server and st.prev_agg is not None:
                o_prime, prev_upload = st.prev_agg
                ctx = AggregationContext(
                    t=t,
                    o=base,
                    o_prime=o_prime,
                    w_t=self.global_params,
                    w_o=self.history[base],
                    w_o_i=upload,
                    w_o_prime_i=prev_upload,
                    w_o_minus_1=self.history[base - 1] if base >= 2 else self.history[base],
                    eta_i=cfg.eta_i,
                    local_epochs=cfg.local_epochs,
                )
                st.server_controls = update_server_controls(
                    st.server_controls, ctx, mode=cfg.sigma_grad_mode
                )
            if self.alpha_mode == ALPHA_STATIC_POLY:
                alpha = self._static_alpha(staleness)
            else:
                alpha = alpha_weight(st.server_controls, t, base)
            self._commit(server_merge(self.global_params, upload, alpha))
            st.prev_agg = (base, upload)
        self.audit.append(
            {
                "time": self.time,
                "device": dev,
                "round": t,
                "base": base,
                "staleness": staleness,
                "accepted": True,
                "alpha": alpha,
                "upload": upload,
            }
        )
        self._end_device_round(dev)

    def _commit(self, new_params):
        self.global_params = new_params
        self.version += 1
        self.history[self.version] = new_params
        self.accepted_count += 1
        cfg = self.cfg
        if self.accepted_count % cfg.eval_every == 0 or self.accepted_count == cfg.T:
            self._push(self.time, EVALUATE, payload=(self.version, new_params, self.discarded_count))


class _SyncSim(_BaseSim):
    """Round-driven loop for fedssmu / fedavg."""

    def run(self):
        cfg = self.cfg
        self.history = {0: self.global_params}
        self._record_metrics(0.0, 0, self.global_params, 0)
        for round_no in range(1, cfg.T + 1):
            if self.time > cfg.max_sim_time:
                break
            self.round_no = round_no
            self.round_base = self.global_params
            self.intra_count = 0
            self.round_uploads = []
            self.uploads_pending = cfg.m_prime
            chosen = self.select_rng.choice(cfg.m, size=cfg.m_prime, replace=False)
            for dev in np.sort(chosen):
                self._start_device(int(dev), base_version=round_no)
            while self.uploads_pending > 0:
                if not self.heap:
                    raise SimulationInvariantError("event queue drained mid-round")
                event = self._pop()
                self._dispatch(event)
            if self.protocol == FEDAVG:
                stacked = np.stack([u for _, u in self.round_uploads])
                weights = np.array(
                    [len(self.partitions[d]) for d, _ in self.round_uploads], dtype=float
                )
                self.global_params = np.average(stacked, axis=0, weights=weights)
            self.version = round_no
            self.history[round_no] = self.global_params
            if round_no % cfg.eval_every == 0 or round_no == cfg.T:
                self._record_metrics(self.time, round_no, self.global_params, self.discarded_count)
        return self._result()

    def _dispatch(self, event):
        if event.kind == EPOCH_DONE:
            self._handle_epoch_done(event.device)
        elif event.kind == FRESH_REQUEST:
            self._handle_fresh_request(event.device)
        elif event.kind == FRESH_ARRIVE:
            self._handle_fresh_arrive(event.device, event.payload)
        elif event.kind == UPLOAD_ARRIVE:
            self._handle_upload(event.device, event.payload)
        else:
            raise SimulationInvariantError(f"unexpected event in round loop: {event.kind}")

    def _handle_fresh_request(self, dev):
        st = self.devices[dev]
        if st.requested:
            raise SimulationInvariantError(f"device {dev} requested twice in one round")
        st.requested = True
        st.fresh_requests += 1
        if self.intra_count > 0:
            payload = (self.round_no, self.intra_count + 1, self.global_params)
            download = transfer_time(self.model_dim, st.profile.downlink_bw)
            self._push(self.time + download, FRESH_ARRIVE, dev, payload)
        else:
            self._push(self.time + st.profile.epoch_compute_time, EPOCH_DONE, dev)

    def _handle_upload(self, dev, payload):
        upload, _ = payload
        cfg = self.cfg
        st = self.devices[dev]
        if self.protocol == FEDAVG:
            self.round_uploads.append((dev, upload))
        else:
            staleness = self.intra_count + 1
            if staleness > cfg.tau:
                self.discarded_count += 1
                self.audit.append(
                    {
                        "time": self.time,
                        "device": dev,
                        "round": self.round_no,
                        "base": None,
                        "staleness": staleness,
                        "accepted": False,
                        "alpha": None,
                    }
                )
            else:
                premerge = self.global_params
                if self.dynamic_server and st.prev_agg is not None:
                    prev_round, prev_staleness, prev_premerge, prev_upload = st.prev_agg
                    st.server_controls = _server_control_step(
                        st.server_controls,
                        prev_round=prev_round,
                        prev_staleness=prev_staleness,
                        w_base=self.round_base,
                        w_upload=upload,
                        w_prev_premerge=prev_premerge,
                        w_prev_upload=prev_upload,
                        eta_i=cfg.eta_i,
                        local_epochs=cfg.local_epochs,
                        mode=cfg.sigma_grad_mode,
                    )
                if self.alpha_mode == ALPHA_HARMONIC:
                    alpha = 1.0 / (self.intra_count + 1)
                elif self.alpha_mode == ALPHA_STATIC_POLY:
                    alpha = cfg.fedasync_alpha * staleness ** -cfg.fedasync_poly_a
                else:
                    alpha = _alpha_from_staleness(st.server_controls, self.round_no, staleness)
                self.global_params = server_merge(self.global_params, upload, alpha)
                st.prev_agg = (self.round_no, staleness, premerge, upload)
                self.intra_count += 1
                self.accepted_count += 1
                self.audit.append(
                    {
                        "time": self.time,
                        "device": dev,
                        "round": self.round_no,
                        "base": None,
                        "staleness": staleness,
                        "accepted": True,
                        "alpha": alpha,
                        "upload": upload,
                    }
                )
        self.uploads_pending -= 1
        self._end_device_round(dev)


def run_fedasmu(config, seed=None):
    """Run the asynchronous staleness-aware protocol; returns a RunResult."""
    seed = config.seeds[0] if seed is None else seed
    return _AsyncSim(config, FEDASMU, seed).run()


def run_fedssmu(config, seed=None):
    """Run the synchronous staleness-aware protocol; returns a RunResult."""
    seed = config.seeds[0] if seed is None else seed
    return _SyncSim(config, FEDSSMU, seed).run()


def run_baseline(config, which, seed=None):
    """Run one of the baselines: fedavg, fedasync, or fedbuff."""
    seed = config.seeds[0] if seed is None else seed
    if which == FEDAVG:
        return _SyncSim(config, FEDAVG, seed).run()
    if which in (FEDASYNC, FEDBUFF):
        return _AsyncSim(config, which, seed).run()
    raise InvalidArgumentError(f"unknown baseline {which!r}")


def run_protocol(config, protocol, seed=None):
    """Run any protocol by name."""
    if protocol == FEDASMU:
        return run_fedasmu(config, seed)
    if protocol == FEDSSMU:
        return run_fedssmu(config, seed)
    return run_baseline(config, protocol, seed)
