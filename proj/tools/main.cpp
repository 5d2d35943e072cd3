#include <iostream>

#include "app.hpp"

int main(int argc, char** argv)
{
    return stochavg::app::run_cli({argv, argv + argc}, std::cout, std::cerr);
}
