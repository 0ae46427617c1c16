"""Desk-scale software stack for a hybrid suction-gripper end effector.

Subsystems:
  protocol    framed byte codec between host and suction controller
  firmware    deterministic pump/valve state machine answering commands
  pneumatics  line pressure, seal and suction-force model
  driver      host-side confirmed-state suction client
  actions     16-entry action / 14-entry proprio layouts and chunk stats
  episodes    demonstration recording format and validation
  scene       kinematic dual-arm world with attachments and articulation
  primitives  scripted suction / grasp / move prime actions
  harness     four household tasks, 15-trial protocol, failure metrics
  teleop      human-in-the-loop session recorder and snapshot stream
  cli         `vacgrip` command line front end
"""

__version__ = "0.1.0"
