"""
Deterministic synthetic couples on the 18-joint skeleton.

Poses come from forward kinematics over fixed segment lengths, so every bone
keeps its length exactly; only joint angles, body yaw and the root move.
Leader angles are sums of low-frequency sinusoids defined for any time
(negative times included). The follower is a function of the leader:

    lagged-mirror       follower(t) = reflect(leader(t - lag)) + offset
    coupled-oscillator  damped second-order system forced by the leader:
                        the follower root tracks the leader's hip-center
                        position, limbs track the leader's joint angles so
                        follower bones keep their lengths
    orbit-lift          follower circles the leader's hip-center, phase and
                        lift driven by the leader's arm height
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.spatial.transform import Rotation

from ..core.config import settings
from ..geometry import EXPI_SKELETON, reflect_pose
from ..motion import MotionSequence
from ..utils.common import ContractError
from .sequences import COUPLE_AERIALS, CoupleSequence, downsample

logger = logging.getLogger(__name__)

MIRROR_LAG = 4
MIRROR_OFFSET = np.array([0.0, 1400.0, 0.0])
ORBIT_RADIUS = 900.0


class Scenario(str, Enum):
    LAGGED_MIRROR = "lagged-mirror"
    COUPLED_OSCILLATOR = "coupled-oscillator"
    ORBIT_LIFT = "orbit-lift"


# channel -> (angle count, amplitude, rest value)
_CHANNELS: Dict[str, Tuple[int, float, float]] = {
    "yaw": (1, 0.6, 0.0),
    "lean": (2, 0.15, 0.0),
    "head": (3, 0.3, 0.0),
    "lshoulder": (3, 0.9, 0.0),
    "rshoulder": (3, 0.9, 0.0),
    "lelbow": (1, 0.6, 0.9),
    "relbow": (1, 0.6, 0.9),
    "lhip": (3, 0.35, 0.0),
    "rhip": (3, 0.35, 0.0),
    "lknee": (1, 0.3, 0.4),
    "rknee": (1, 0.3, 0.4),
    "lankle": (1, 0.2, 0.0),
    "rankle": (1, 0.2, 0.0),
    "root": (3, 250.0, 0.0),
}
_ROOT_HEIGHT = 950.0
_COMPONENTS = 3
_FREQUENCY_HZ = (0.15, 0.9)


@dataclass(frozen=True)
class Choreography:
    """Per channel: sinusoid amplitudes, frequencies (Hz) and phases."""

    amplitudes: Dict[str, np.ndarray]
    frequencies: Dict[str, np.ndarray]
    phases: Dict[str, np.ndarray]

    @classmethod
    def random(cls, rng: np.random.Generator, energy: float = 1.0) -> "Choreography":
        amplitudes, frequencies, phases = {}, {}, {}
        for name, (count, amplitude, _) in _CHANNELS.items():
            shape = (count, _COMPONENTS)
            amplitudes[name] = energy * amplitude * rng.uniform(0.2, 1.0, shape) / _COMPONENTS
            frequencies[name] = rng.uniform(*_FREQUENCY_HZ, shape)
            phases[name] = rng.uniform(0.0, 2 * np.pi, shape)
        return cls(amplitudes, frequencies, phases)

    def evaluate(self, times: np.ndarray) -> Dict[str, np.ndarray]:
        """Channel values (F, count) at `times` seconds."""
        times = np.asarray(times, dtype=np.float64)[:, None, None]
        curves = {}
        for name, (_, _, rest) in _CHANNELS.items():
            waves = self.amplitudes[name] * np.sin(2 * np.pi * self.frequencies[name] * times + self.phases[name])
            curves[name] = rest + waves.sum(axis=-1)
        return curves


@dataclass(frozen=True)
class Performer:
    """Segment lengths in millimetres; left is +x, forward +y, up +z in the body frame."""

    hip_half_width: float = 120.0
    torso: float = 520.0
    shoulder_half_width: float = 180.0
    shoulder_drop: float = 40.0
    upper_arm: float = 290.0
    forearm: float = 260.0
    thigh: float = 430.0
    shin: float = 420.0
    foot: float = 150.0
    head_forward: float = 80.0
    head_up: float = 170.0
    head_half_width: float = 75.0
    head_side_up: float = 130.0

    def scaled(self, factor: float) -> "Performer":
        return Performer(**{name: value * factor for name, value in self.__dict__.items()})

    def pose(self, curves: Dict[str, np.ndarray]) -> np.ndarray:
        """(F, 18, 3) joint positions from channel curves."""
        num_frames = curves["yaw"].shape[0]
        body = Rotation.from_euler(
            "zxy", np.column_stack([curves["yaw"][:, 0], curves["lean"]])).as_matrix()
        head = body @ Rotation.from_euler("zxy", curves["head"]).as_matrix()

        def place(rotation: np.ndarray, offset) -> np.ndarray:
            return np.einsum("fij,j->fi", rotation, np.asarray(offset, dtype=np.float64))

        root = curves["root"] + np.array([0.0, 0.0, _ROOT_HEIGHT])
        joints = np.empty((num_frames, EXPI_SKELETON.num_joints, 3))

        def put(name: str, value: np.ndarray) -> None:
            joints[:, EXPI_SKELETON.index(name)] = value

        neck = root + place(body, (0.0, 0.0, self.torso))
        put("neck", neck)
        put("fhead", neck + place(head, (0.0, self.head_forward, self.head_up)))
        put("lhead", neck + place(head, (self.head_half_width, 0.0, self.head_side_up)))
        put("rhead", neck + place(head, (-self.head_half_width, 0.0, self.head_side_up)))

        for side, sign in (("l", 1.0), ("r", -1.0)):
            shoulder = neck + place(body, (sign * self.shoulder_half_width, 0.0, -self.shoulder_drop))
            upper = body @ Rotation.from_euler("xyz", curves[f"{side}shoulder"] * [1.0, sign, sign]).as_matrix()
            elbow = shoulder + place(upper, (0.0, 0.0, -self.upper_arm))
            fore = upper @ Rotation.from_euler("x", curves[f"{side}elbow"][:, 0]).as_matrix()
            put(f"{side}shoulder", shoulder)
            put(f"{side}elbow", elbow)
            put(f"{side}wrist", elbow + place(fore, (0.0, 0.0, -self.forearm)))

            hip = root + place(body, (sign * self.hip_half_width, 0.0, 0.0))
            thigh = body @ Rotation.from_euler("xyz", curves[f"{side}hip"] * [1.0, sign, sign]).as_matrix()
            knee = hip + place(thigh, (0.0, 0.0, -self.thigh))
            shin = thigh @ Rotation.from_euler("x", -curves[f"{side}knee"][:, 0]).as_matrix()
            heel = knee + place(shin, (0.0, 0.0, -self.shin))
            foot = shin @ Rotation.from_euler("x", curves[f"{side}ankle"][:, 0]).as_matrix()
            put(f"{side}hip", hip)
            put(f"{side}knee", knee)
            put(f"{side}heel", heel)
            put(f"{side}toes", heel + place(foot, (0.0, self.foot, 0.0)))
        return joints


def _times(num_frames: int, fps: float, shift: int = 0) -> np.ndarray:
    return (np.arange(num_frames) - shift) / fps


def _lagged_mirror(rng, leader_moves, leader_body, num_frames, fps):
    leader = leader_body.pose(leader_moves.evaluate(_times(num_frames, fps)))
    lagged = leader_body.pose(leader_moves.evaluate(_times(num_frames, fps, MIRROR_LAG)))
    follower = reflect_pose(lagged) + MIRROR_OFFSET
    return leader, follower


def _coupled_oscillator(rng, leader_moves, leader_body, num_frames, fps,
                        frequency_hz: float = 1.2, damping: float = 0.4, warmup_s: float = 2.0):
    follower_body = leader_body.scaled(0.93)
    warmup = int(round(warmup_s * fps))
    drive = leader_moves.evaluate(_times(num_frames + warmup, fps, warmup))
    leader = leader_body.pose(drive)
    omega = 2 * np.pi * frequency_hz
    dt = 1.0 / fps

    # the root is pulled toward the leader's hip-center position, limbs toward the leader's joint angles
    hip_center = 0.5 * (leader[:, EXPI_SKELETON.index("lhip")] + leader[:, EXPI_SKELETON.index("rhip")])
    drive["root"] = hip_center - np.array([0.0, 0.0, _ROOT_HEIGHT]) + MIRROR_OFFSET

    names = list(_CHANNELS)
    target = np.concatenate([drive[name] for name in names], axis=1)
    state = target[0].copy()
    velocity = np.zeros_like(state)
    response = np.empty_like(target)
    for t in range(target.shape[0]):
        # semi-implicit Euler
        velocity += dt * (omega ** 2 * (target[t] - state) - 2 * damping * omega * velocity)
        state = state + dt * velocity
        response[t] = state

    follower_curves, column = {}, 0
    for name in names:
        count = _CHANNELS[name][0]
        follower_curves[name] = response[warmup:, column:column + count]
        column += count
    return leader[warmup:], follower_body.pose(follower_curves)


def _orbit_lift(rng, leader_moves, leader_body, num_frames, fps,
                phase_gain: float = 1.5, lift_gain: float = 0.25):
    follower_body = leader_body.scaled(0.9)
    leader_curves = leader_moves.evaluate(_times(num_frames, fps))
    leader = leader_body.pose(leader_curves)

    wrists = [EXPI_SKELETON.index("lwrist"), EXPI_SKELETON.index("rwrist")]
    neck = EXPI_SKELETON.index("neck")
    arm_height = leader[:, wrists, 2].mean(axis=1) - leader[:, neck, 2]
    reach = leader_body.upper_arm + leader_body.forearm
    phase = rng.uniform(0, 2 * np.pi) + phase_gain * arm_height / reach

    hip_center = 0.5 * (leader[:, EXPI_SKELETON.index("lhip")] + leader[:, EXPI_SKELETON.index("rhip")])
    follower_curves = Choreography.random(rng, energy=0.6).evaluate(_times(num_frames, fps))
    follower_curves["root"] = np.column_stack([
        hip_center[:, 0] + ORBIT_RADIUS * np.cos(phase),
        hip_center[:, 1] + ORBIT_RADIUS * np.sin(phase),
        lift_gain * np.clip(arm_height + reach, 0.0, None),
    ])
    # face the leader
    follower_curves["yaw"] = (phase + np.pi / 2)[:, None]
    return leader, follower_body.pose(follower_curves)


_SCENARIOS = {
    Scenario.LAGGED_MIRROR: _lagged_mirror,
    Scenario.COUPLED_OSCILLATOR: _coupled_oscillator,
    Scenario.ORBIT_LIFT: _orbit_lift,
}


def parse_scenario(name: Union[str, Scenario]) -> Scenario:
    try:
        return Scenario(name)
    except ValueError:
        raise ContractError(f"unknown scenario {name!r}; expected one of {[s.value for s in Scenario]}") from None


def synthesize_couple(seed: int, scenario: Union[str, Scenario], num_frames: int,
                      fps: Optional[float] = None, *, aerial: int = 1, couple: int = 1, rep: int = 1,
                      seq_id: Optional[str] = None) -> CoupleSequence:
    if num_frames < 1:
        raise ContractError(f"need at least one frame, got {num_frames}")
    scenario = parse_scenario(scenario)
    fps = float(fps or settings.SOURCE_FPS)
    rng = np.random.default_rng(seed)
    leader_moves = Choreography.random(rng)
    leader_body = Performer().scaled(rng.uniform(0.95, 1.05))
    leader, follower = _SCENARIOS[scenario](rng, leader_moves, leader_body, num_frames, fps)
    return CoupleSequence(
        seq_id=seq_id or f"{scenario.value}-s{seed}",
        leader=MotionSequence(leader, fps),
        follower=MotionSequence(follower, fps),
        aerial=aerial,
        couple=couple,
        rep=rep,
    )


def catalogue_labels() -> List[Tuple[int, int]]:
    """(couple, aerial) for every aerial each couple performs."""
    return [(couple, aerial) for couple, aerials in COUPLE_AERIALS.items() for aerial in aerials]


def synthesize_dataset(seed: int, scenario: Union[str, Scenario], count: int, num_frames: int,
                       source_fps: Optional[float] = None, target_fps: Optional[float] = None
                       ) -> List[CoupleSequence]:
    """
    `count` sequences cycling through the catalogue labels, one repetition
    per pass. Each is generated at the source rate and downsampled to the
    target rate.
    """
    if count < 0:
        raise ContractError(f"count must be non-negative, got {count}")
    source_fps = source_fps or settings.SOURCE_FPS
    target_fps = target_fps or settings.TARGET_FPS
    factor = int(round(source_fps / target_fps))
    if factor < 1 or abs(source_fps / factor - target_fps) > 1e-9:
        raise ContractError(f"source rate {source_fps} is not a multiple of target rate {target_fps}")

    labels = catalogue_labels()
    sequences = []
    for i in range(count):
        couple, aerial = labels[i % len(labels)]
        rep = i // len(labels) + 1
        child_seed = int(np.random.SeedSequence([seed, couple, aerial, rep]).generate_state(1)[0])
        seq = synthesize_couple(
            child_seed, scenario, num_frames, source_fps,
            aerial=aerial, couple=couple, rep=rep, seq_id=f"c{couple}-a{aerial:02d}-r{rep}",
        )
        sequences.append(downsample(seq, factor))
    logger.info(f"Synthesized {len(sequences)} {parse_scenario(scenario).value} sequences")
    return sequences
