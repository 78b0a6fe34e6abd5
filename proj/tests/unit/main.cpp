#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include "g2d/log.hpp"

int main(int argc, char** argv)
{
    g2d::log::set_level(g2d::log::Level::quiet);
    doctest::Context ctx(argc, argv);
    return ctx.run();
}
