#pragma once

#include "riccimap/align.hpp"
#include "riccimap/channels.hpp"
#include "riccimap/embed.hpp"
#include "riccimap/exceptions.hpp"
#include "riccimap/fixtures.hpp"
#include "riccimap/geom.hpp"
#include "riccimap/mesh.hpp"
#include "riccimap/mesh_io.hpp"
#include "riccimap/ricci.hpp"
