"""Index layout for the packed state and parameter vectors.

The integration kernel works on flat float64 arrays so it can be compiled
with or without numba.  Everything that needs to agree on array offsets
imports the constants from here.
"""

# --- state vector (13 entries) ---
VX = 0          # longitudinal velocity, body frame [m/s]
VY = 1          # lateral velocity, body frame [m/s]
YAW_RATE = 2    # [rad/s], positive counterclockwise
ROLL = 3        # roll angle [rad], positive = lean toward +a_y side
ROLL_RATE = 4   # [rad/s]
W_FL = 5        # wheel spin speeds [rad/s]
W_FR = 6
W_RL = 7
W_RR = 8
POS_X = 9       # world position [m]
POS_Y = 10
HEADING = 11    # world yaw [rad]
PATH_S = 12     # distance travelled, used for terrain lookup [m]

NSTATE = 13

# --- packed parameter vector ---
P_MASS = 0              # total mass [kg]
P_MASS_SPRUNG = 1       # sprung mass [kg]
P_MASS_UNSPRUNG = 2     # unsprung mass [kg]
P_H_SPRUNG = 3          # sprung CG height above roll axis [m]
P_ROLL_INERTIA = 4      # sprung roll inertia about roll axis [kg m^2]
P_YAW_INERTIA = 5       # total yaw inertia [kg m^2]
P_ROLL_STIFFNESS = 6    # suspension roll stiffness [N m / rad]
P_ROLL_DAMPING = 7      # suspension roll damping [N m s / rad]
P_STIFF_ASYM = 8        # left/right stiffness asymmetry, dimensionless
P_DAMP_ASYM = 9         # left/right damping asymmetry, dimensionless
P_TRACK_WIDTH = 10      # [m]
P_LF = 11               # CG to front axle [m]
P_LR = 12               # CG to rear axle [m]
P_WHEEL_RADIUS = 13     # [m]
P_GRAVITY = 14          # [m/s^2]
P_ROLL_AXIS_H = 15      # roll axis height above ground [m]
P_WHEEL_INERTIA = 16    # per-wheel spin inertia [kg m^2]
P_FRONT_ROLL_SHARE = 17 # fraction of lateral transfer carried by front axle
P_DRAG = 18             # aero drag force = P_DRAG * vx^2 [N s^2/m^2]
P_ROLL_RESIST = 19      # rolling resistance force = P_ROLL_RESIST * m * g
P_TIRE_B = 20           # magic-formula stiffness factor
P_TIRE_C = 21           # magic-formula shape factor
P_TIRE_D = 22           # magic-formula peak friction (nominal surface)
P_TIRE_E = 23           # magic-formula curvature factor
P_TIRE_LOAD_SENS = 24   # cornering-stiffness load sensitivity exponent
P_TIRE_STIFF = 25       # derived normalized stiffness coefficient
P_CG_HEIGHT = 26        # derived total CG height above ground [m]
P_TIP_INERTIA = 27      # derived roll inertia about a wheel contact line [kg m^2]

NPARAM = 28
