"""Software twin of a four-chamber fabric pneumatic fingertip display.

Subpackages cover the quasi-static pouch model, pump/valve/chamber dynamics,
stimulus rendering from hand motion, the binary frame protocol, the firmware
controller, the virtual tactile sensor, frequency/step/durability
characterization, small-sample statistics, the discrimination study engine,
and an HTTP/WebSocket experimenter service.
"""

from .controller import Controller, ControllerConfig
from .dynamics import DynamicsParams, PneumaticSystem
from .errors import (AnalysisError, ClockError, ConfigError, DomainError,
                     HapticsError, ProtocolError)
from .protocol import FrameReceiver, HapticFrame, decode, encode, make_frame
from .rendering import ContactPad, HandSample, SceneObject, render_frames
from .rig import Rig, run_simulation
from .sensing import PressureMap, sense
from .statics import ActuatorGeometry, blocked_force
from .study import (IdealObserver, StudySession, TaskSpec, TrialRecord,
                    analyze, schedule)

__version__ = "0.1.0"

__all__ = [
    "ActuatorGeometry", "AnalysisError", "ClockError", "ConfigError",
    "ContactPad", "Controller", "ControllerConfig", "DomainError",
    "DynamicsParams", "FrameReceiver", "HandSample", "HapticFrame",
    "HapticsError", "IdealObserver", "PneumaticSystem", "PressureMap",
    "ProtocolError", "Rig", "SceneObject", "StudySession", "TaskSpec",
    "TrialRecord", "analyze", "blocked_force", "decode", "encode",
    "make_frame", "render_frames", "run_simulation", "schedule", "sense",
]
